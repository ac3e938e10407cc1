"""Runtime-discoverable properties.

Objects mixing in PropertyBag expose named properties that can be listed,
read, and written at runtime without knowing the concrete class.  Values
are JSON-shaped (None, bool, number, string, list, dict) so they can be
handed straight to serializers or UIs.

Properties can be declared per class (shared by all instances, inherited
like ordinary members) or attached to a single instance; both are looked
up through the same accessors.
"""

from __future__ import annotations

from typing import Any, Callable, Optional

import numpy as np


class UnknownPropertyError(KeyError):
    pass


class ReadOnlyPropertyError(RuntimeError):
    pass


class PropertyTypeError(TypeError):
    pass


def to_json_value(value: Any) -> Any:
    """Coerce a value to JSON-shaped structure (complex -> [re, im])."""
    if isinstance(value, (np.generic,)):
        value = value.item()
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.ndarray):
        return [to_json_value(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [to_json_value(v) for v in value]
    if isinstance(value, dict):
        return {str(k): to_json_value(v) for k, v in value.items()}
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    raise PropertyTypeError(f"cannot represent {type(value).__name__} as JSON value")


class _PropertyDef:
    __slots__ = ("getter", "setter")

    def __init__(self, getter, setter):
        self.getter = getter
        self.setter = setter


class PropertyBag:
    """Mixin providing the runtime property table."""

    _class_properties: dict[str, _PropertyDef] = {}

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        # Inherit parent's properties; subclass declarations extend a copy.
        merged: dict[str, _PropertyDef] = {}
        for base in reversed(cls.__mro__):
            merged.update(getattr(base, "_class_properties", {}))
        cls._class_properties = merged

    @classmethod
    def declare_property(
        cls,
        name: str,
        getter: Callable[[Any], Any],
        setter: Optional[Callable[[Any, Any], None]] = None,
    ) -> None:
        cls._class_properties = dict(cls._class_properties)
        cls._class_properties[name] = _PropertyDef(getter, setter)

    def add_property(
        self,
        name: str,
        getter: Callable[[], Any],
        setter: Optional[Callable[[Any], None]] = None,
    ) -> None:
        """Attach a property to this instance only."""
        if not hasattr(self, "_instance_properties"):
            self._instance_properties: dict[str, _PropertyDef] = {}
        self._instance_properties[name] = _PropertyDef(
            lambda _obj: getter(),
            None if setter is None else (lambda _obj, v: setter(v)),
        )

    def property_names(self) -> list[str]:
        names = list(self._class_properties)
        names.extend(getattr(self, "_instance_properties", {}))
        return names

    def _find_property(self, name: str) -> _PropertyDef:
        inst = getattr(self, "_instance_properties", None)
        if inst and name in inst:
            return inst[name]
        try:
            return self._class_properties[name]
        except KeyError:
            raise UnknownPropertyError(name) from None

    def get_property(self, name: str) -> Any:
        return to_json_value(self._find_property(name).getter(self))

    def set_property(self, name: str, value: Any) -> None:
        prop = self._find_property(name)
        if prop.setter is None:
            raise ReadOnlyPropertyError(name)
        prop.setter(self, value)
