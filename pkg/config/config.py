import logging
import os
from typing import List, Optional
from dotenv import load_dotenv

_LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
_VALID_LEVELS = ("CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG")

_PACKAGE_DIR = os.path.dirname(os.path.abspath(__file__))


class Config:
    """Singleton configuration class for the simulator"""

    _instance: Optional['Config'] = None
    _initialized: bool = False

    def __new__(cls) -> 'Config':
        if cls._instance is None:
            cls._instance = super(Config, cls).__new__(cls)
        return cls._instance

    def __init__(self) -> None:
        if not self._initialized:
            load_dotenv()
            self._load_config()
            Config._initialized = True

    def _load_config(self) -> None:
        """Load configuration from environment variables"""
        # Model data
        self.PARAMS_PATH = os.getenv(
            "ROBOPAINTER_PARAMS_PATH", os.path.join(_PACKAGE_DIR, "robopainter.params.json")
        )
        self.ROOMS_DIR = os.getenv("ROBOPAINTER_ROOMS_DIR", os.path.join(_PACKAGE_DIR, "rooms"))
        self.DEFAULT_SEED = int(os.getenv("ROBOPAINTER_SEED", "7"))

        # Logging
        self.LOG_LEVEL = os.getenv("ROBOPAINTER_LOG_LEVEL", "INFO").upper()

        # Outputs
        self.OUTPUT_DIR = os.getenv("OUTPUT_DIR", "outputs")

        # FastAPI Configuration
        self.APP_NAME = os.getenv("APP_NAME", "RoboPainter Simulator API")
        self.APP_VERSION = os.getenv("APP_VERSION", "1.0.0")
        self.DEBUG = os.getenv("DEBUG", "False").lower() == "true"
        self.HOST = os.getenv("HOST", "0.0.0.0")
        self.PORT = int(os.getenv("PORT", "8000"))

    def ensure_output_dir(self) -> str:
        """Create the output directory on first use"""
        os.makedirs(self.OUTPUT_DIR, exist_ok=True)
        return self.OUTPUT_DIR

    def validate(self) -> List[str]:
        """Return configuration problems; empty when everything is usable"""
        problems = []
        if not os.path.isfile(self.PARAMS_PATH):
            problems.append(f"parameter file not found: {self.PARAMS_PATH}")
        if self.LOG_LEVEL not in _VALID_LEVELS:
            problems.append(f"ROBOPAINTER_LOG_LEVEL must be one of {', '.join(_VALID_LEVELS)}")
        return problems

    @classmethod
    def get_instance(cls) -> 'Config':
        """Get the singleton instance"""
        if cls._instance is None:
            cls._instance = cls()
        return cls._instance

    @classmethod
    def reset(cls) -> None:
        """Drop the singleton so the next access re-reads the environment"""
        cls._instance = None
        cls._initialized = False


def setup_logging(level: Optional[str] = None) -> None:
    """Install one stream handler on the root logger at the configured level"""
    config = Config.get_instance()
    level_name = (level or config.LOG_LEVEL).upper()
    if level_name not in _VALID_LEVELS:
        level_name = "INFO"
    root = logging.getLogger()
    if not any(getattr(h, "_robopainter", False) for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(_LOG_FORMAT))
        handler._robopainter = True
        root.addHandler(handler)
    root.setLevel(level_name)
