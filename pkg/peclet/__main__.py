"""Allow running peclet-lab as a module: python -m peclet"""

from peclet.cli.main import cli

if __name__ == "__main__":
    cli()
