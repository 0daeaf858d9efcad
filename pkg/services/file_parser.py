import json

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, Union

import yaml

from models.errors import ConfigError


class FileParser:
    @staticmethod
    def parse_file(file_content: bytes, filename: str) -> Dict[str, Any]:
        """Parse a config or policy document and return its mapping"""

        file_extension = filename.split('.')[-1].lower()

        try:
            if file_extension == 'toml':
                return tomllib.loads(file_content.decode('utf-8'))
            elif file_extension in ('yaml', 'yml'):
                return FileParser._parse_yaml(file_content)
            elif file_extension == 'json':
                return json.loads(file_content.decode('utf-8'))
            else:
                raise ConfigError([f"Unsupported file type: {file_extension}"])

        except ConfigError:
            raise
        except (tomllib.TOMLDecodeError, yaml.YAMLError, json.JSONDecodeError, UnicodeDecodeError) as e:
            raise ConfigError([f"Error parsing {filename}: {str(e)}"]) from e

    @staticmethod
    def parse_path(path: Union[str, Path]) -> Dict[str, Any]:
        path = Path(path)
        if not path.is_file():
            raise ConfigError([f"File not found: {path}"])
        return FileParser.parse_file(path.read_bytes(), path.name)

    @staticmethod
    def _parse_yaml(file_content: bytes) -> Dict[str, Any]:
        document = yaml.safe_load(file_content.decode('utf-8'))
        if not isinstance(document, dict):
            raise ConfigError(["YAML document must be a mapping"])
        return document
