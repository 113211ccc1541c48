from vidbus.cli import main

raise SystemExit(main())
