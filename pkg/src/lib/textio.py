"""Plain-text numeric I/O helpers shared by the file-format readers and writers."""

from pathlib import Path
from typing import Iterable, Iterator, List, Sequence, Tuple

from .errors import FormatError


def format_float(value: float) -> str:
    """Shortest decimal string that round-trips to the same float."""
    return repr(float(value))


def format_row(values: Iterable[float]) -> str:
    """Space-separated shortest round-trip decimals."""
    return " ".join(format_float(v) for v in values)


def content_lines(text: str) -> Iterator[Tuple[int, List[str]]]:
    """
    Yield ``(line_number, tokens)`` for every non-blank, non-comment line.

    Whitespace is collapsed; a line whose first non-blank character is ``#``
    is a comment.
    """
    for line_number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield line_number, stripped.split()


class TokenReader:
    """Sequential reader over the content lines of a text file."""

    def __init__(self, text: str, source: str):
        self._lines = list(content_lines(text))
        self._position = 0
        self.source = source

    @classmethod
    def from_path(cls, path: Path) -> "TokenReader":
        return cls(Path(path).read_text(encoding="utf-8"), str(path))

    def next_line(self, expected_tokens: int = -1) -> List[str]:
        if self._position >= len(self._lines):
            raise FormatError(f"{self.source}: unexpected end of file")
        line_number, tokens = self._lines[self._position]
        self._position += 1
        if expected_tokens >= 0 and len(tokens) != expected_tokens:
            raise FormatError(
                f"{self.source}:{line_number}: expected {expected_tokens} values, got {len(tokens)}"
            )
        return tokens

    def expect_header(self, magic: str, version: str = "1") -> None:
        tokens = self.next_line()
        if tokens != [magic, version]:
            raise FormatError(f"{self.source}: expected header '{magic} {version}', got '{' '.join(tokens)}'")

    def read_ints(self, count: int) -> List[int]:
        tokens = self.next_line(count)
        try:
            return [int(t) for t in tokens]
        except ValueError as e:
            raise FormatError(f"{self.source}: invalid integer ({e})") from e

    def read_floats(self, count: int) -> List[float]:
        tokens = self.next_line(count)
        try:
            return [float(t) for t in tokens]
        except ValueError as e:
            raise FormatError(f"{self.source}: invalid number ({e})") from e

    def ensure_exhausted(self) -> None:
        if self._position != len(self._lines):
            line_number, _ = self._lines[self._position]
            raise FormatError(f"{self.source}:{line_number}: trailing content")


def write_lines(path: Path, lines: Sequence[str]) -> Path:
    """Write lines with a trailing newline, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
