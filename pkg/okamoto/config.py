import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

folder_name = ".okamoto"
OKAMOTO_HOME = Path(os.path.expanduser(os.environ.get("OKAMOTO_HOME", f"~/{folder_name}")))
SETTINGS_DIR = OKAMOTO_HOME / "settings"

# Largest grid (3**depth endpoints) box counting and graph sampling will build.
MAX_GRID_DEPTH = int(os.environ.get("OKAMOTO_MAX_GRID_DEPTH", "14"))
