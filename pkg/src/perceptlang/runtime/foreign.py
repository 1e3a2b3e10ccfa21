"""Host objects that agents reach through ``invoke``."""

from __future__ import annotations

import inspect
import itertools
import threading
from typing import Any

from ..errors import EvalError
from ..values import ForeignHandle


class ForeignRegistry:
    """Maps handle ids to host objects.

    A host object exposes its callable surface either as a ``foreign_methods``
    mapping of name to callable, or as public methods. Calls must return
    promptly: the agent loop does not run while a method executes.
    """

    def __init__(self):
        self._objects: dict[int, Any] = {}
        self._ids = itertools.count(1)
        self._lock = threading.Lock()

    def register(self, obj: Any) -> ForeignHandle:
        with self._lock:
            hid = next(self._ids)
            self._objects[hid] = obj
        return ForeignHandle(hid)

    def release(self, handle: ForeignHandle) -> None:
        with self._lock:
            self._objects.pop(handle.id, None)

    def get(self, handle: ForeignHandle) -> Any:
        with self._lock:
            obj = self._objects.get(handle.id)
        if obj is None:
            raise EvalError(f"invoke on dead handle {handle.id}")
        return obj

    def invoke(self, handle: ForeignHandle, method: str, args: list) -> Any:
        obj = self.get(handle)
        table = getattr(obj, "foreign_methods", None)
        if table is not None:
            fn = table.get(method)
        else:
            fn = getattr(obj, method, None) if not method.startswith("_") else None
        if fn is None or not callable(fn):
            raise EvalError(f"unknown method '{method}' on handle {handle.id}")
        try:
            inspect.signature(fn).bind(*args)
        except TypeError:
            raise EvalError(f"arity mismatch calling '{method}' with {len(args)} argument(s)") from None
        return fn(*args)
