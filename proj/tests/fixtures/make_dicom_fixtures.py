"""Writes the DICOM fixture corpus with pydicom (an independent encoder).

Usage: python3 make_dicom_fixtures.py OUT_DIR
The generated files are committed; rerun only to change the corpus.
"""
import sys
from pathlib import Path

from pydicom.dataset import Dataset, FileMetaDataset
from pydicom.sequence import Sequence
from pydicom.uid import ExplicitVRLittleEndian, ImplicitVRLittleEndian, ExplicitVRBigEndian, generate_uid

PIXELS = [0, 1, 2, 4095, 100, 200, 300, 400, 1000, 2000, 3000, 0x1FA0]  # last has a bit above BitsStored


def base(modality="CR", photometric="MONOCHROME2", series="Left Fore Carpus DLPMO", body=None,
         rows=3, cols=4, pixels=PIXELS, syntax=ExplicitVRLittleEndian):
    meta = FileMetaDataset()
    meta.MediaStorageSOPClassUID = "1.2.840.10008.5.1.4.1.1.1"
    meta.MediaStorageSOPInstanceUID = "1.2.3.4.5.6.7.8"
    meta.TransferSyntaxUID = syntax
    meta.ImplementationClassUID = "1.2.3.4"
    ds = Dataset()
    ds.file_meta = meta
    ds.SOPClassUID = meta.MediaStorageSOPClassUID
    ds.SOPInstanceUID = meta.MediaStorageSOPInstanceUID
    ds.Modality = modality
    if series is not None:
        ds.SeriesDescription = series
    if body is not None:
        ds.BodyPartExamined = body
    ds.PatientID = "HORSE-0001"
    ref = Dataset()
    ref.ReferencedSOPClassUID = "1.2.840.10008.5.1.4.1.1.1"
    ref.ReferencedSOPInstanceUID = "1.2.3.4.5.6.7.9"
    ds.ReferencedImageSequence = Sequence([ref])
    ds["ReferencedImageSequence"].is_undefined_length = True
    ser = Dataset()
    ser.SeriesInstanceUID = "1.2.3.4.5.6.7.10"
    ds.ReferencedSeriesSequence = Sequence([ser])
    ds.SamplesPerPixel = 1
    ds.PhotometricInterpretation = photometric
    if rows is not None:
        ds.Rows = rows
    ds.Columns = cols
    ds.BitsAllocated = 16
    ds.BitsStored = 12
    ds.HighBit = 11
    ds.PixelRepresentation = 0
    ds.PixelData = b"".join(int(v).to_bytes(2, "little") for v in pixels)
    return ds


def save(ds, path):
    little = ds.file_meta.TransferSyntaxUID != ExplicitVRBigEndian
    implicit = ds.file_meta.TransferSyntaxUID == ImplicitVRLittleEndian
    ds.save_as(path, enforce_file_format=True, implicit_vr=implicit, little_endian=little)


def main(out):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    save(base(), out / "valid_mono2.dcm")
    save(base(modality="DX", photometric="MONOCHROME1", series=None, body="R HIND TARSUS LM"),
         out / "valid_mono1.dcm")
    save(base(syntax=ImplicitVRLittleEndian), out / "implicit_vr.dcm")
    save(base(syntax=ExplicitVRBigEndian), out / "big_endian.dcm")
    save(base(rows=None), out / "missing_rows.dcm")
    save(base(modality="MR"), out / "mr_modality.dcm")
    save(base(series=None, body=None), out / "no_view.dcm")
    save(base(photometric="PALETTE COLOR"), out / "palette.dcm")
    save(base(pixels=PIXELS[:-1]), out / "pixel_length.dcm")
    save(base(series="Left Fore Knee DP"), out / "unknown_view.dcm")
    save(base(series="L FORE CARPUS DP", rows=4, cols=4, pixels=range(16)), out / "cr_4x4.dcm")
    save(base(series=None, body="CARPUS"), out / "body_part_only.dcm")
    save(base(rows=2, cols=2, pixels=[0, 1, 2, 3]), out / "mono2_2x2.dcm")
    save(base(rows=2, cols=2, pixels=[0, 1, 2, 3], photometric="MONOCHROME1"), out / "mono1_2x2.dcm")
    save(base(rows=4, cols=4, pixels=range(12)), out / "declared_4x4_24_bytes.dcm")

    valid = (out / "valid_mono2.dcm").read_bytes()
    (out / "truncated.dcm").write_bytes(valid[: len(valid) - 7])
    bad = bytearray(valid)
    bad[128:132] = b"DICN"
    (out / "bad_magic.dcm").write_bytes(bytes(bad))
    # (0008,0070) Manufacturer appended after Pixel Data.
    tail = (0x0008).to_bytes(2, "little") + (0x0070).to_bytes(2, "little") + b"LO" + (4).to_bytes(2, "little") + b"ACME"
    (out / "out_of_order.dcm").write_bytes(valid + tail)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent / "dicom")
