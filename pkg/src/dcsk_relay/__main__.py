from dcsk_relay.experiments import main

if __name__ == "__main__":
    raise SystemExit(main())
