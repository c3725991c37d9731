function displayWelcome(count) {
    if (count > 0) {
        console.log("Welcome!");
        displayWelcome(count - 1);
    }
}

displayWelcome(3);
JQuery.ajax(url: "verifyAccount.py", method: "POST");
