import os


def parse_taus(text):
    """Parse "t1,t2,..." into a list of floats."""
    try:
        return [float(tau) for tau in text.split(',') if tau.strip()]
    except ValueError:
        raise ValueError(f'Invalid threshold list: {text!r}.') from None


def parse_grid(text):
    """Parse "WxH" (or a single "N") into a (height, width) shape."""
    parts = text.lower().split('x')
    try:
        if len(parts) == 1:
            width = height = int(parts[0])
        elif len(parts) == 2:
            width, height = (int(part) for part in parts)
        else:
            raise ValueError
    except ValueError:
        raise ValueError(f'Invalid size {text!r}, expected WIDTHxHEIGHT.') from None
    if width < 1 or height < 1:
        raise ValueError(f'Invalid size {text!r}.')
    return height, width


def worker_count(requested=None):
    """Number of worker processes, capped by TROF_THREADS."""
    count = requested or os.cpu_count() or 1
    cap = os.environ.get('TROF_THREADS')
    if cap:
        try:
            count = min(count, max(1, int(cap)))
        except ValueError:
            print(f'WARNING: ignoring invalid TROF_THREADS={cap!r}.')
    return max(1, count)
