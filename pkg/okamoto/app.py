from .commands import main as run

if __name__ == '__main__':
    run()
