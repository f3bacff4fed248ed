"""Behavioral simulator and s-domain analyzer for a clock-data-recovery PLL."""
