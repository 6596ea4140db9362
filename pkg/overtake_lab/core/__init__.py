"""Core functionality for the overtaking analysis toolkit"""
