"""Allow running as python -m afcmemory."""

from afcmemory.cli import cli

if __name__ == "__main__":
    cli()
