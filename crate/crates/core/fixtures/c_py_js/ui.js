function render(title) {
    var el = document.getElementById("title");
    el.textContent = title;
    log("rendered");
}

function log(msg) {
    console.log(msg);
}

render("Dashboard");
