"""Configuration management for MMSOUND."""

import os
from pathlib import Path
from pydantic import BaseModel, Field
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


class Config(BaseModel):
    """Toolkit defaults."""

    # Output settings
    output_dir: Path = Field(default=Path("mmsound-out"))
    workers: int = Field(default=1, ge=1)
    log_level: str = Field(default="WARNING")

    # Analysis defaults
    tail_fraction: float = Field(default=0.1, gt=0.0, le=0.5)
    dynamic_range_db: float = Field(default=60.0, gt=0.0)
    false_alarm_rate: float = Field(default=1e-4, gt=0.0, lt=1.0)

    # Sounder defaults (27.85 GHz campaign)
    center_freq_hz: float = Field(default=27.85e9, gt=0.0)

    def __init__(self, **data):
        """Initialize configuration from environment variables."""
        env_data = {
            "output_dir": Path(os.getenv("MMSOUND_OUTPUT_DIR", "mmsound-out")),
            "workers": int(os.getenv("MMSOUND_WORKERS", "1")),
            "log_level": os.getenv("MMSOUND_LOG_LEVEL", "WARNING").upper(),
            "tail_fraction": float(os.getenv("MMSOUND_TAIL_FRACTION", "0.1")),
            "dynamic_range_db": float(os.getenv("MMSOUND_DYNAMIC_RANGE_DB", "60")),
            "false_alarm_rate": float(os.getenv("MMSOUND_FALSE_ALARM_RATE", "1e-4")),
            "center_freq_hz": float(os.getenv("MMSOUND_CENTER_FREQ_HZ", "27.85e9")),
        }
        env_data.update(data)
        super().__init__(**env_data)


# Global configuration instance
config = Config()
