"""
mementolens entry point

Runs the command line from a source checkout:

    python app.py fetch --dataset data/top25.txt
    python app.py analyze top25-wayback
"""

from dotenv import load_dotenv

from mementolens.cli import main

# Load environment variables from .env file
load_dotenv()

if __name__ == "__main__":
    raise SystemExit(main())
