"""Export modules for sweep tables and reports."""
