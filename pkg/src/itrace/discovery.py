"""Minimal mDNS / DNS-SD responder for zero-configuration discovery.

Advertises the session service as ``_itrace._tcp.local.`` so clients on
the same LAN can find the server without manual addressing. Discovery is
strictly optional: if multicast is unavailable the server keeps running
and only a warning is logged.

The wire encode/decode helpers are pure functions so the protocol logic
is testable without touching the network.
"""

from __future__ import annotations

import logging
import socket
import struct
import threading
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

MDNS_GROUP = "224.0.0.251"
MDNS_PORT = 5353

TYPE_A = 1
TYPE_PTR = 12
TYPE_TXT = 16
TYPE_SRV = 33
CLASS_IN = 1
CACHE_FLUSH = 0x8001

SERVICE_TYPE = "_itrace._tcp.local."
DEFAULT_TTL = 120


def encode_name(name: str) -> bytes:
    out = b""
    for label in name.rstrip(".").split("."):
        raw = label.encode("utf-8")
        out += bytes([len(raw)]) + raw
    return out + b"\x00"


def decode_name(data: bytes, offset: int) -> tuple[str, int]:
    """Decode a possibly-compressed DNS name; returns (name, next offset)."""
    labels = []
    jumped = False
    next_offset = offset
    seen = set()
    while True:
        if offset in seen:
            raise ValueError("compression loop")
        seen.add(offset)
        length = data[offset]
        if length == 0:
            if not jumped:
                next_offset = offset + 1
            break
        if length & 0xC0 == 0xC0:
            pointer = struct.unpack_from("!H", data, offset)[0] & 0x3FFF
            if not jumped:
                next_offset = offset + 2
            offset = pointer
            jumped = True
            continue
        labels.append(data[offset + 1 : offset + 1 + length].decode("utf-8", "replace"))
        offset += 1 + length
    return ".".join(labels) + ".", next_offset


def parse_questions(packet: bytes) -> list[tuple[str, int]]:
    """Return (name, qtype) for each question in a DNS query packet."""
    if len(packet) < 12:
        return []
    flags, qdcount = struct.unpack_from("!HH", packet, 2)
    if flags & 0x8000:  # a response, not a query
        return []
    questions = []
    offset = 12
    for _ in range(qdcount):
        name, offset = decode_name(packet, offset)
        qtype, _qclass = struct.unpack_from("!HH", packet, offset)
        offset += 4
        questions.append((name.lower(), qtype))
    return questions


def _record(name: str, rtype: int, rclass: int, ttl: int, rdata: bytes) -> bytes:
    return encode_name(name) + struct.pack("!HHIH", rtype, rclass, ttl, len(rdata)) + rdata


def encode_txt(txt: dict[str, str]) -> bytes:
    out = b""
    for k, v in txt.items():
        item = f"{k}={v}".encode("utf-8")
        out += bytes([len(item)]) + item
    return out or b"\x00"


@dataclass
class ServiceAdvertisement:
    instance: str
    port: int
    host: str = field(default_factory=socket.gethostname)
    address: str = "127.0.0.1"
    txt: dict[str, str] = field(default_factory=dict)
    service_type: str = SERVICE_TYPE

    @property
    def instance_name(self) -> str:
        return f"{self.instance}.{self.service_type}"

    @property
    def host_name(self) -> str:
        return f"{self.host.split('.')[0]}.local."

    def response_packet(self, ttl: int = DEFAULT_TTL) -> bytes:
        """Unsolicited announcement / query response with PTR+SRV+TXT+A."""
        header = struct.pack("!HHHHHH", 0, 0x8400, 0, 4, 0, 0)
        ptr = _record(self.service_type, TYPE_PTR, CLASS_IN, ttl, encode_name(self.instance_name))
        srv_rdata = struct.pack("!HHH", 0, 0, self.port) + encode_name(self.host_name)
        srv = _record(self.instance_name, TYPE_SRV, CACHE_FLUSH, ttl, srv_rdata)
        txt = _record(self.instance_name, TYPE_TXT, CACHE_FLUSH, ttl, encode_txt(self.txt))
        a = _record(self.host_name, TYPE_A, CACHE_FLUSH, ttl, socket.inet_aton(self.address))
        return header + ptr + srv + txt + a

    def answers(self, packet: bytes) -> bytes | None:
        """Response packet if the query asks about this service, else None."""
        wanted = {self.service_type.lower(), self.instance_name.lower()}
        for name, qtype in parse_questions(packet):
            if name in wanted and qtype in (TYPE_PTR, TYPE_SRV, TYPE_TXT, TYPE_A, 255):
                return self.response_packet()
        return None


def pick_instance_name(base: str, taken: set[str]) -> str:
    """Resolve name collisions by numeric suffix: base, base-2, base-3, ..."""
    if base not in taken:
        return base
    i = 2
    while f"{base}-{i}" in taken:
        i += 1
    return f"{base}-{i}"


def _local_ip() -> str:
    s = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    try:
        s.connect(("224.0.0.251", 5353))
        return s.getsockname()[0]
    except OSError:
        return "127.0.0.1"
    finally:
        s.close()


class Announcer:
    """Background responder thread; withdraw() sends a goodbye (TTL 0)."""

    def __init__(self, instance: str, port: int, txt: dict[str, str] | None = None):
        self.ad = ServiceAdvertisement(
            instance=instance,
            port=port,
            address=_local_ip(),
            txt=txt or {"api": "1", "name": instance},
        )
        self._sock: socket.socket | None = None
        self._thread: threading.Thread | None = None
        self._stop = threading.Event()

    def start(self) -> bool:
        try:
            sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM, socket.IPPROTO_UDP)
            sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            sock.bind(("", MDNS_PORT))
            mreq = socket.inet_aton(MDNS_GROUP) + socket.inet_aton("0.0.0.0")
            sock.setsockopt(socket.IPPROTO_IP, socket.IP_ADD_MEMBERSHIP, mreq)
            sock.settimeout(0.5)
        except OSError as e:
            log.warning("mDNS discovery unavailable (%s); continuing without it", e)
            return False
        self._sock = sock
        self._thread = threading.Thread(target=self._serve, daemon=True)
        self._thread.start()
        self._send(self.ad.response_packet())
        return True

    def _send(self, packet: bytes) -> None:
        if self._sock is None:
            return
        try:
            self._sock.sendto(packet, (MDNS_GROUP, MDNS_PORT))
        except OSError as e:
            log.warning("mDNS send failed: %s", e)

    def _serve(self) -> None:
        while not self._stop.is_set():
            try:
                packet, addr = self._sock.recvfrom(9000)
            except socket.timeout:
                continue
            except OSError:
                break
            try:
                reply = self.ad.answers(packet)
            except (ValueError, IndexError, struct.error):
                continue
            if reply is not None:
                self._send(reply)

    def close(self) -> None:
        if self._sock is not None:
            self._send(self.ad.response_packet(ttl=0))
            self._stop.set()
            if self._thread is not None:
                self._thread.join(timeout=2.0)
            try:
                self._sock.close()
            except OSError:
                pass
            self._sock = None
