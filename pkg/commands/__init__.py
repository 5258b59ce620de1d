"""
Command handlers invoked by main.py; each returns a process exit code.
"""
