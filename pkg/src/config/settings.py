"""
Configuration settings for blobflow
Environment-driven defaults shared by every subcommand and study
"""
import sys
from typing import Optional

from loguru import logger
from pydantic_settings import BaseSettings

from src import __version__


class Settings(BaseSettings):
    """Application settings"""

    # Logging
    log_level: str = "INFO"
    show_progress: bool = True

    # Pairwise sums
    threads: int = 1
    deterministic: bool = True
    block_size: int = 256  # rows per pairwise block

    # Kernel tabulation
    n_tab: int = 2048
    r_min_factor: float = 1e-4  # r_min = r_min_factor * eps
    r_max: float = 1e3
    quad_rtol: float = 1e-9
    quad_max_refinements: int = 5
    tail_factor: float = 50.0  # tail switch = tail_factor * eps
    tail_rtol: float = 1e-8

    # Optimal transport
    max_transport_pairs: int = 4_000_000
    check_plans: bool = True
    emd_max_iter: int = 10_000_000

    # Output
    output_dir: str = "out"
    code_version: str = __version__

    class Config:
        env_file = ".env"
        env_prefix = "BLOBFLOW_"
        case_sensitive = False

    def configure_logging(self, level: Optional[str] = None):
        """Install a single stderr sink at the configured level"""
        logger.remove()
        logger.add(sys.stderr, level=(level or self.log_level).upper())

    def resolve_threads(self, override: Optional[int] = None) -> int:
        """Thread count for pairwise sums, CLI override first"""
        threads = override if override is not None else self.threads
        return max(1, int(threads))


settings = Settings()
