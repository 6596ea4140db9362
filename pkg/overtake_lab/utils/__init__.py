"""Utility modules for the overtaking analysis toolkit"""
