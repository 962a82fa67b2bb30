"""Allow running with: python -m app <command>"""
import sys

from app.main import main

sys.exit(main())
