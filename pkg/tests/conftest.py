import sys
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent

# experiment entry points live in scripts/; the acceptance suite reuses
# their tuned method settings
sys.path.insert(0, str(REPO_ROOT / "scripts"))


def config_path(name: str) -> Path:
    return REPO_ROOT / "configs" / name
