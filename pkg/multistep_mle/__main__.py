from multistep_mle.cli import main

if __name__ == "__main__":
    main()
