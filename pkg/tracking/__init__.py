"""Convergence tracking"""
