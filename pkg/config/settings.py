"""
MHK Configuration Settings
"""
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Toolkit settings with environment variable support (prefix MHK_)"""

    model_config = SettingsConfigDict(
        env_prefix="MHK_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Application
    APP_NAME: str = "matrix-hardy-kit"
    APP_VERSION: str = "0.1.0"
    LOG_LEVEL: str = "WARNING"

    # Truncation
    DEFAULT_ORDER: int = 32
    MAX_ORDER: int = 512

    # Tolerances
    TOL_ABS: float = 1e-10
    TOL_REL: float = 1e-8
    EPS_MARGIN: float = 1e-8  # spectral radius guard: rho < 1 - EPS_MARGIN
    COND_LIMIT: float = 1e12

    # Positivity and rank decisions
    GRAM_PD_RTOL: float = 1e-10
    RANK_RTOL: float = 1e-10
    HANKEL_RTOL: float = 1e-9  # sigma_{r+1} / sigma_1 cut for Hankel realization
    CONTRACTION_SLACK: float = 1e-9
    REALIZATION_SLACK: float = 1e-12

    # Factorization / division
    LEECH_TOL: float = 1e-6
    DIVISION_TOL: float = 1e-6
    DIVISION_BUFFER: float = 0.25  # fraction of trailing orders left out of residuals

    # Quadrature grids
    CIRCLE_GRID: int = 512
    FOCK_RADIAL: int = 400
    FOCK_ANGULAR: int = 64
    FOCK_CUTOFF: float = 6.0

    # Sampling / parallelism
    SEED: int = 7
    THREADS: int = 1


settings = Settings()
