"""Format error type and the line reader shared by the codecs."""

from pathlib import Path
from typing import Iterator, Optional


class FormatError(ValueError):
    """A malformed input file, with the location of the problem."""

    def __init__(self, message: str, path: Path | str, line: Optional[int] = None) -> None:
        self.path = Path(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else str(self.path)
        super().__init__(f"{where}: {message}")


def numbered_lines(path: Path) -> Iterator[tuple[int, str]]:
    """Yield (1-based line number, stripped text), decoding UTF-8 one line at a time."""
    with path.open("rb") as handle:
        for number, raw in enumerate(handle, start=1):
            try:
                text = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise FormatError(f"invalid UTF-8 at byte {exc.start}", path, number) from None
            yield number, text.strip()
