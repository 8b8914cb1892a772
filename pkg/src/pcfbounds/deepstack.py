"""Run recursive term traversals on a thread with a large stack.

Typing, substitution and unfolding recurse on the term structure.  Entry
points that may see very deep terms are wrapped with :func:`deep_stack`,
which moves the call to a worker thread with a 512 MiB stack and a raised
recursion limit.  Nested wrapped calls run inline.
"""

from __future__ import annotations

import functools
import sys
import threading

STACK_BYTES = 512 * 1024 * 1024
RECURSION_LIMIT = 1_000_000
_local = threading.local()


def deep_stack(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        if getattr(_local, "inside", False):
            return fn(*args, **kwargs)
        box: dict = {}

        def target():
            _local.inside = True
            try:
                box["value"] = fn(*args, **kwargs)
            except BaseException as exc:  # re-raised in the caller
                box["error"] = exc

        if sys.getrecursionlimit() < RECURSION_LIMIT:
            sys.setrecursionlimit(RECURSION_LIMIT)
        old = threading.stack_size(STACK_BYTES)
        try:
            worker = threading.Thread(target=target, name="pcfbounds-deep")
            worker.start()
        finally:
            threading.stack_size(old)
        worker.join()
        if "error" in box:
            raise box["error"]
        return box["value"]

    return wrapper
