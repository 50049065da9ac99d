# Grid-artifact analysis toolkit
from .config import ARTIFACT_VERSION as __version__
