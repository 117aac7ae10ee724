"""Certified linearizations of block operator matrix functions."""
