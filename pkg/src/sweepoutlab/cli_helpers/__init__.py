# CLI helper modules for sweepoutlab
