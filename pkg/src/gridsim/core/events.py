"""Event-action mechanism (observer-style).

Components expose Events; interested parties register actions on them.
Triggering runs the actions registered at trigger time, in registration
order.  Registrations and deregistrations made while a trigger is running
take effect from the next trigger.
"""

from __future__ import annotations

from typing import Callable


class StaleTokenError(RuntimeError):
    """Raised when deregistering an action token twice."""


class ActionToken:
    __slots__ = ("event", "owner", "action", "active")

    def __init__(self, event: "Event", owner: str, action: Callable[[], None]):
        self.event = event
        self.owner = owner
        self.action = action
        self.active = True

    def deregister(self) -> None:
        self.event.deregister(self)


class Event:
    def __init__(self, description: str = ""):
        self.description = description
        self._actions: list[ActionToken] = []

    def register(self, owner: str, action: Callable[[], None]) -> ActionToken:
        token = ActionToken(self, owner, action)
        self._actions.append(token)
        return token

    def deregister(self, token: ActionToken) -> None:
        if not token.active or token.event is not self:
            raise StaleTokenError(
                f"token owned by {token.owner!r} already deregistered"
            )
        token.active = False
        self._actions.remove(token)

    def trigger(self) -> None:
        # Snapshot so mid-trigger (de)registrations apply next trigger only.
        for token in list(self._actions):
            token.action()

    def __len__(self) -> int:
        return len(self._actions)

    def __repr__(self) -> str:
        return f"Event({self.description!r}, {len(self._actions)} actions)"
