from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    LOG_LEVEL: str = "INFO"
    TRACE_DIR: str = "traces"
    INIT_HALF_RANGE: float = 0.5
    FD_STEP: float = 1e-6
    PIVOT_FLOOR: float = 1e-12
    SYMMETRY_TOL: float = 1e-9
    RIDGE_RESTART: float = 1e-3
    DEFAULT_ALPHA: float = 0.1
    DEFAULT_TEST_FRACTION: float = 0.30

    class Config:
        env_file = ".env"

settings = Settings()
