function save(data) {
    JQuery.ajax(url: "handler.py", data: data);
}

save("payload");
