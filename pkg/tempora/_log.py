import sys, datetime

from .config import DEBUG

def log(*args):
    """Print only when TEMPORA_DEBUG=1 is set"""
    if not DEBUG:
        return
    ts = datetime.datetime.now().strftime("%H:%M:%S")
    print(f"[tempora {ts}]", *args, file=sys.stderr, flush=True)
