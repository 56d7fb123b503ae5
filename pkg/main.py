"""
Command-line entrypoint.

Use `python main.py bench --config grid.json` for benchmarks and
`streamlit run streamlit_app.py` for the UI.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent / "src"))

from bench.cli import main

if __name__ == "__main__":
    sys.exit(main())
