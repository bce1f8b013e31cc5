from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # App Configuration
    APP_NAME: str = "QKD-Sec"
    APP_VERSION: str = "1.0.0"
    DEBUG: bool = False
    LOG_LEVEL: str = "WARNING"

    # Reproducibility (decimal or 0x-prefixed hex, overridden by --seed)
    DEFAULT_SEED: str = "0"

    class Config:
        # Load environment variables from .env (root). Use OS env otherwise.
        env_file = ".env"
        env_prefix = "QKDSEC_"
        case_sensitive = False
        extra = "ignore"


# Global settings instance
settings = Settings()


# Numerical tolerances
PROB_TOL = 1e-9
HERMITIAN_TOL = 1e-9
MAJORIZATION_TOL = 1e-12
STEER_TOL = 1e-10
MIN_OUTCOME_PROB = 1e-12
B92_X_SLACK = 1e-6

# Enumeration and dimension caps
MAX_TOTAL_DIM = 4096
TYPICAL_ENUM_CAP = 2 ** 20
COLLISION_MAX_N_IN = 10
COLLISION_LITERAL_CAP = 2 ** 16
EXACT_COND_MAX_ALPHABET = 4
EXACT_EVE_MAX_N = 6

# Reconciliation decoder
IR_MAX_WEIGHT = 4
IR_MAX_CANDIDATES = 2 ** 16
IR_EXACT_MAX_LEN = 24
IR_DEFAULT_MARGIN = 6
# Block layout sizes against an upper estimate of the key-basis error rate
IR_LAYOUT_CONFIDENCE = 0.5
IR_MIN_LAYOUT_RATE = 0.005

# Protocol defaults
DEFAULT_SAMPLING_EXPONENT = 1.0 / 3.0
DEFAULT_PA_EPSILON = 1e-3
DEFAULT_B92_ALPHA = 0.38

# Analyzer search
GOLDEN_TOL = 1e-9
THRESHOLD_TOL = 1e-6
BELL_NOISE_BRACKET = (1e-6, 0.4999)
B92_NOISE_BRACKET = (1e-6, 0.24)
B92_ALPHA_STEP = 0.005
