# cuspfreq/config.py
from pydantic_settings import BaseSettings, SettingsConfigDict

class Settings(BaseSettings):
    """
    Manages numeric defaults, tolerances and the fixture location.
    Loads variables from a .env file or CUSPFREQ_* environment variables.
    """
    # Calibration fixtures (BoundaryX, kappa, cross-section heights)
    FIXTURE_DIR: str = "fixtures"

    # Expansions
    MAX_TERMS: int = 10000
    DECIMAL_DPS: int = 60

    # Geometry is evaluated at this many digits, never below 40
    GEOMETRY_DPS: int = 40

    # Orbit / reduction caps
    CYCLE_CAP: int = 1000
    REDUCTION_CAP: int = 200

    # Attractor iteration
    ATTRACTOR_WINDOW: float = 20.0
    # One seed per grid step of the forward coordinate, capped
    ATTRACTOR_MAX_SEEDS: int = 200000
    ATTRACTOR_TAIL: int = 12
    ATTRACTOR_GRID: float = 1e-3
    ATTRACTOR_ITERS: int = 60
    COMPONENT_CELL: float = 0.25
    COMPONENT_MIN_SHARE: float = 0.01

    # Frequency classification
    FREQUENCY_TOL: float = 0.05
    DIVERGENCE_MIN_STEP: float = 0.05
    ORACLE_STEP: float = 0.01

    RANDOM_SEED: int = 0
    LOG_LEVEL: str = "WARNING"

    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding='utf-8', env_prefix="CUSPFREQ_", extra='ignore'
    )

    @property
    def geometry_dps(self) -> int:
        return max(self.GEOMETRY_DPS, 40)

# Create a single instance of the settings to be used across the package
settings = Settings()
