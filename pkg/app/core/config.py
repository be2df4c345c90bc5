from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field
from pathlib import Path


class Settings(BaseSettings):
    CDE_MAX_CELLS: int = Field(default=2**24, gt=0)  # dense table / error-configuration guard
    CDE_LOG_DIR: str = Field(default="")
    CDE_LOG_LEVEL: str = "INFO"
    app_version: str = "0.1.0"

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore"
    )

    @property
    def log_dir(self) -> Path:
        return Path(self.CDE_LOG_DIR) if self.CDE_LOG_DIR else (Path.home() / ".cde" / "logs")

    @property
    def max_cells(self) -> int:
        return self.CDE_MAX_CELLS


settings = Settings()
