"""Main entry point for Overtake Lab"""

from .cli import main

if __name__ == "__main__":
    main()
