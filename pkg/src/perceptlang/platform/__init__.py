"""Containers, agent registry, routing and the inter-container wire protocol."""

from .platform import MAIN_CONTAINER, MemoryEndpoint, Platform, RemoteContainer
from .wire import Frame, FrameReader, FrameType, decode_frame, encode_frame

__all__ = [
    "MAIN_CONTAINER",
    "Frame",
    "FrameReader",
    "FrameType",
    "MemoryEndpoint",
    "Platform",
    "RemoteContainer",
    "decode_frame",
    "encode_frame",
]
