# main.py
import logging
import sys

from cli.router import CommandApp
from tensorize import tensorize_commands
from decomp import decomp_commands
from learn import learn_commands
from compress import compress_commands
from bss import bss_commands
from settings import get_log_level

app = CommandApp(prog="tensorkit", description="Tensorize data, decompose tensors and learn from them.")

app.include_router(tensorize_commands.router)
app.include_router(decomp_commands.router)
app.include_router(learn_commands.router)
app.include_router(compress_commands.router)
app.include_router(bss_commands.router)


def run(argv=None, stdout=None) -> int:
    """Run one command; returns the process exit status."""
    logging.basicConfig(level=get_log_level(), stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    return app.run(sys.argv[1:] if argv is None else list(argv), stdout=stdout)


if __name__ == "__main__":
    sys.exit(run())
