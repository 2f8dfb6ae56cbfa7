"""
Entry point to application. Instantiates application object and runs the requested command.
"""

from zeromode.app import ZeroMode

if __name__ == "__main__":
    raise SystemExit(ZeroMode().main())
