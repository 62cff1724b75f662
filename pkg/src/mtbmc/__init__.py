"""Bounded model checking for multi-threaded MTC programs."""
