def run():
    print("job")


run()
