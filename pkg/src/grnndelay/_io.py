import contextlib
import os
import tempfile
from pathlib import Path


def fmt(x: float) -> str:
    """17 significant digits: enough for a bit-exact float64 round-trip."""
    return format(float(x), ".17g")


@contextlib.contextmanager
def atomic_write(path, mode="w"):
    """Write to a temp file beside ``path`` and rename it into place on success."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    umask = os.umask(0)
    os.umask(umask)
    try:
        os.chmod(tmp, 0o666 & ~umask)
        with os.fdopen(fd, mode, encoding="utf-8", newline="") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise
