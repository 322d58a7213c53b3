from ecgamut.cli import main

main()
