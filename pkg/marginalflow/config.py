from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    #PARALLELISM
    jobs: int = 1

    #NUMERICAL TOLERANCES
    gap_tol: float = 1e-6
    tol: float = 1e-9
    max_basis_dim: int = 10_000

    #FLOW SETTINGS
    stop_d: float = 1e-10
    t_max: float = 50.0
    dt_initial: float = 0.05
    dt_min: float = 1e-6
    dt_max: float = 0.25
    snapshot_stride: int = 1

    #VARIATIONAL SETTINGS
    variational_restarts: int = 8
    variational_max_iter: int = 2000
    variational_gtol: float = 1e-7

    #FILE SETTINGS
    output_dir: str = "outputs"
    upload_dir: str = "uploads"
    max_upload_size: int = 1024 * 1024  # 1MB
    allowed_extensions: list = [".json"]

    #LOGGING
    log_level: str = "INFO"

    #SERVER SETTINGS
    host: str = "0.0.0.0"
    port: int = 8000

    model_config = SettingsConfigDict(env_file=".env", env_prefix="MARGINALFLOW_", extra="ignore")

settings = Settings()
