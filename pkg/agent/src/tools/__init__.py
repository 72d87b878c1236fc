from .base import register_tools
from .context import RunContext, set_context
__all__ = ["register_tools", "RunContext", "set_context"]
