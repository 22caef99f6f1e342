from .service import create_app
from .sessions import AdvisorError, Session, SessionStore

__all__ = ["AdvisorError", "Session", "SessionStore", "create_app"]
