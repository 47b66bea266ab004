from ._mabeam import *  # noqa: F401,F403
