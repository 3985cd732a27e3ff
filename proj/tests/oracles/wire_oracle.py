"""Independent bitwise CRC-16/CCITT-FALSE and frame layout oracle.

Produces the frozen byte fixtures used by tests/unit/test_wire.cpp.
"""
import struct


def crc16_ccitt_false(data: bytes) -> int:
    crc = 0xFFFF
    for byte in data:
        for bit in range(7, -1, -1):
            top = (crc >> 15) & 1
            inbit = (byte >> bit) & 1
            crc = (crc << 1) & 0xFFFF
            if top ^ inbit:
                crc ^= 0x1021
    return crc


def position_frame(tag, seq, ts, x, y, z, err):
    body = struct.pack("<BHBI", 0x01, tag, seq, ts) + struct.pack("<iiiH", x, y, z, err)
    head = bytes([0xA5, len(body)])
    crc = crc16_ccitt_false(head + body)
    return head + body + struct.pack("<H", crc)


def frame(ftype, tag, seq, ts, payload):
    body = struct.pack("<BHBI", ftype, tag, seq, ts) + payload
    head = bytes([0xA5, len(body)])
    return head + body + struct.pack("<H", crc16_ccitt_false(head + body))


def hexs(b):
    return " ".join(f"{x:02X}" for x in b)


if __name__ == "__main__":
    print("check", hex(crc16_ccitt_false(b"123456789")))
    f = position_frame(2, 7, 1000, 3000, 2000, 1000, 320)
    print(len(f), " ".join(f"{b:02X}" for b in f))
    print(hexs(frame(0x02, 3, 255, 123456, struct.pack("<HIB", 4, 7543, 200))))
    print(hexs(frame(0x03, 1, 0, 33, struct.pack("<9h", 10, -20, 1000, 5, -6, 7, 300, 0, -200))))
    print(hexs(frame(0x04, 65535, 9, 4294967295, struct.pack("<BB", 87, 0x81))))
