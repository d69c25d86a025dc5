import logging
from dotenv import load_dotenv
from pydantic import Field, computed_field
from pydantic_settings import BaseSettings

# Load environment variables from .env file
load_dotenv(".env", override=True)
logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Class to store all the settings of the WeightForge toolkit."""

    # ------------------------------
    # Runtime
    # ------------------------------
    WEIGHTFORGE_THREADS: int = Field(default=1, ge=1, description="Cap on joblib workers for multistart restarts")
    WEIGHTFORGE_LOG_LEVEL: str = Field(default="INFO")
    WEIGHTFORGE_DEFAULT_SEED: int = Field(default=0)

    # ------------------------------
    # Linear programming
    # ------------------------------
    WEIGHTFORGE_FEASIBILITY_TOL: float = Field(default=1e-9, gt=0)
    WEIGHTFORGE_PIVOT_TOL: float = Field(default=1e-12, gt=0)
    WEIGHTFORGE_LP_MAX_ITERATIONS: int = Field(default=20000, ge=1)

    # ------------------------------
    # Synthesis & certification
    # ------------------------------
    WEIGHTFORGE_VERIFY_TOL: float = Field(default=1e-8, gt=0)
    WEIGHTFORGE_VERIFY_BATCH: int = Field(default=10000, ge=1)
    WEIGHTFORGE_ORACLE_TOL: float = Field(default=1e-9, gt=0)
    WEIGHTFORGE_MAX_CUTS: int = Field(default=200, ge=1)
    WEIGHTFORGE_BISECTION_STEPS: int = Field(default=40, ge=1)
    WEIGHTFORGE_DEFAULT_BUDGET: int = Field(default=8, ge=1)
    WEIGHTFORGE_DEFAULT_TOL: float = Field(default=1e-4, gt=0)
    WEIGHTFORGE_TRUNCATION: int = Field(default=40, ge=1)

    # ------------------------------
    # Exhaustive search limits
    # ------------------------------
    WEIGHTFORGE_ENUMERATION_LIMIT: int = Field(default=14, ge=1, description="Max dimension for sign enumeration")

    # ------------------------------
    # Computed Fields
    # ------------------------------
    @computed_field
    @property
    def PARALLEL_ENABLED(self) -> bool:
        """Computed field telling services whether restarts may run concurrently."""
        return self.WEIGHTFORGE_THREADS > 1

    class Config:
        """Configuration for the settings class."""
        env_file = ".env"
        env_file_encoding = "utf-8"
        extra = "ignore"


# Instantiate the settings
settings = Settings()
