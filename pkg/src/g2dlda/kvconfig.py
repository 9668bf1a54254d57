"""Line-oriented ``key = value`` files with ``#`` comments and comma-separated lists."""
import configparser
from pathlib import Path

_SECTION = "root"


class ConfigError(ValueError):
    pass


def parse_kv(text, source="<string>"):
    parser = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#",), inline_comment_prefixes=("#",),
        interpolation=None,
    )
    parser.optionxform = str
    try:
        parser.read_string(f"[{_SECTION}]\n{text}", source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return dict(parser[_SECTION])


def read_kv(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    return parse_kv(text, str(path))


def split_list(value):
    return [item.strip() for item in value.split(",") if item.strip()]


def parse_range(value):
    """``"1-32"``, ``"1..32"``, ``"5"`` or ``"1,2,4"`` -> sorted list of ints."""
    value = value.strip()
    for sep in ("..", "-"):
        if sep in value:
            lo, hi = (int(v) for v in value.split(sep, 1))
            return list(range(lo, hi + 1))
    return sorted({int(v) for v in split_list(value)})


def as_bool(value):
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")
