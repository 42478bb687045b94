"""
Utility functions for gridcon framework.
"""
from typing import Dict, Any, Union
import json
import os
import yaml

PathLike = Union[str, "os.PathLike[str]"]


def load_json_file(file_path: PathLike) -> Dict[str, Any]:
    """
    Load data from a JSON file.
    
    Args:
        file_path: Path to the JSON file
        
    Returns:
        Dictionary with the loaded data
        
    Raises:
        FileNotFoundError: If the file does not exist
        json.JSONDecodeError: If the file is not valid JSON
    """
    with open(file_path, 'r', encoding='utf-8') as f:
        return json.load(f)


def save_json_file(data: Any, file_path: PathLike, indent: int = 2) -> None:
    """
    Save data to a JSON file.

    Keys are sorted so that identical data gives byte-identical files.
    
    Args:
        data: Data to save
        file_path: Path to the output file
        indent: Indentation level for JSON formatting
    """
    directory = os.path.dirname(os.fspath(file_path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    
    with open(file_path, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=indent, sort_keys=True)
        f.write("\n")


def append_json_line(record: Dict[str, Any], file_path: PathLike) -> None:
    """
    Append one record to a JSON-lines file.

    Args:
        record: JSON-serialisable record
        file_path: Path to the .jsonl file
    """
    with open(file_path, 'a', encoding='utf-8') as f:
        f.write(json.dumps(record, sort_keys=True))
        f.write("\n")


def load_yaml_file(file_path: PathLike) -> Dict[str, Any]:
    """
    Load data from a YAML file.
    
    Args:
        file_path: Path to the YAML file
        
    Returns:
        Dictionary with the loaded data
        
    Raises:
        FileNotFoundError: If the file does not exist
        yaml.YAMLError: If the file is not valid YAML
    """
    with open(file_path, 'r', encoding='utf-8') as f:
        return yaml.safe_load(f) or {}


def format_clock(seconds: float) -> str:
    """
    Format scenario time as HH:MM:SS.

    Args:
        seconds: Seconds since scenario start

    Returns:
        Clock string, e.g. ``00:03:45``
    """
    total = int(round(seconds))
    hours, rest = divmod(total, 3600)
    minutes, secs = divmod(rest, 60)
    return f"{hours:02d}:{minutes:02d}:{secs:02d}"


def parse_clock(value: Union[str, float, int]) -> float:
    """
    Parse ``HH:MM:SS``, ``MM:SS`` or a plain number of seconds.

    Args:
        value: Clock string or seconds

    Returns:
        Seconds as float

    Raises:
        ValueError: If the string is not a clock value
    """
    if isinstance(value, (int, float)):
        return float(value)
    parts = [float(p) for p in str(value).strip().split(":")]
    if not parts or len(parts) > 3:
        raise ValueError(f"Not a clock value: {value!r}")
    seconds = 0.0
    for part in parts:
        seconds = seconds * 60.0 + part
    return seconds
