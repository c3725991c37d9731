def handle(request):
    print(request)


handle("request")
