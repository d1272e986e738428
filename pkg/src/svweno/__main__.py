#!/usr/bin/env python3
"""Main entry point for svweno package when run as module."""

from .cli import entrypoint

if __name__ == "__main__":
    entrypoint()
