from .wire.cli import main

raise SystemExit(main())
