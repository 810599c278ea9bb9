from ternalg.main import run

run()
