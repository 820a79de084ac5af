"""
Run manifest written next to every command's outputs.
"""
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from utils.errors import ConfigurationError
from utils.serialization import read_json, write_json

MANIFEST_NAME = 'manifest.json'


@dataclass
class RunManifest:
    """Everything needed to repeat a run: command, arguments, seed and config."""

    command: str
    arguments: dict
    config_path: str = None
    seed: int = None
    output_dir: str = None
    profile: str = 'development'
    tool_version: str = None
    timestamp: str = None
    outputs: list = field(default_factory=list)

    def stamp(self):
        self.timestamp = datetime.now(timezone.utc).isoformat(timespec='seconds')
        return self

    def to_dict(self):
        """Convert manifest to dictionary."""
        return asdict(self)

    @classmethod
    def from_dict(cls, payload):
        try:
            return cls(**payload)
        except TypeError as e:
            raise ConfigurationError(f"malformed run manifest: {e}") from e

    def write(self, directory):
        return write_json(Path(directory) / MANIFEST_NAME, self.to_dict())

    @classmethod
    def read(cls, path):
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        return cls.from_dict(read_json(path))
