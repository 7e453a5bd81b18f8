import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


class Config:
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'WARNING')
    LOG_FILE = os.getenv('PSEUDOLAP_LOG_FILE', 'logs/pseudolap.log')

    # Tolerances
    DEFAULT_TOL = float(os.getenv('PSEUDOLAP_TOL', 1e-6))
    ABS_TOL = float(os.getenv('PSEUDOLAP_ABS_TOL', 1e-12))
    REL_TOL = float(os.getenv('PSEUDOLAP_REL_TOL', 1e-10))
    MAX_ITER = int(os.getenv('PSEUDOLAP_MAX_ITER', 200))

    # Determinants
    DEFAULT_C = float(os.getenv('PSEUDOLAP_C', 50))
    HEAT_SPLIT = float(os.getenv('PSEUDOLAP_HEAT_SPLIT', 1.0))
    MELLIN_SPLIT = float(os.getenv('PSEUDOLAP_MELLIN_SPLIT', 1.0))

    # Spectral tables
    MAX_LATTICE_POINTS = int(float(os.getenv('PSEUDOLAP_MAX_LATTICE_POINTS', 2e7)))
    MAX_CUTOFF = float(os.getenv('PSEUDOLAP_MAX_CUTOFF', 1e5))
    WORKERS = int(os.getenv('PSEUDOLAP_WORKERS', 1))

    OUTPUT_FOLDER = os.getenv('OUTPUT_FOLDER', 'output')

    @staticmethod
    def validate():
        if not (0 < Config.DEFAULT_TOL < 1):
            raise ValueError("PSEUDOLAP_TOL must lie in (0, 1)")
        if Config.ABS_TOL < 0 or Config.REL_TOL < 0 or max(Config.ABS_TOL, Config.REL_TOL) == 0:
            raise ValueError("PSEUDOLAP_ABS_TOL / PSEUDOLAP_REL_TOL must be >= 0, one of them > 0")
        if Config.MAX_ITER < 1:
            raise ValueError("PSEUDOLAP_MAX_ITER must be a positive integer")
        if Config.DEFAULT_C < 10:
            raise ValueError("PSEUDOLAP_C must be at least 10")
        if Config.HEAT_SPLIT <= 0 or Config.MELLIN_SPLIT <= 0:
            raise ValueError("split points must be positive")
        if Config.MAX_LATTICE_POINTS < 1000:
            raise ValueError("PSEUDOLAP_MAX_LATTICE_POINTS too small")
        if Config.WORKERS < 1:
            raise ValueError("PSEUDOLAP_WORKERS must be >= 1")

        # Create logs directory if it doesn't exist
        log_dir = os.path.dirname(Config.LOG_FILE) if Config.LOG_FILE else ''
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir)
