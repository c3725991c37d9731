function draw(shape, color) {
    console.log(shape + color);
}

draw("circle", "red");
