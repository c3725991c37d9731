function showWelcome(user) {
    console.log("welcome " + user);
}
